"""
Utils package: error hierarchy, configuration loading, run settings and
on-disk file formats shared by the engine and the CLI.
"""
