"""
Command handlers for the splitstep CLI.

Each handler takes a validated ``RunConfig``, runs one study and writes its
data files into ``run.output``.
"""
