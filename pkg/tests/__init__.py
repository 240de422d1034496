# Tests package for splitstep
