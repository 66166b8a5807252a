# Core modules for the Ehrenfest workbench

__version__ = "0.1.0"
