# mcsense/__init__.py - Matrix completion toolkit for sensor grids

__version__ = "1.0.0"
