"""
Development scripts for splitstep.
"""
