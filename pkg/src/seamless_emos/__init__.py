"""Seamless multimodel temperature postprocessing.

EMOS-style Gaussian regression per lead time on a blend of three forecast
sources, with observation persistence and model persistence so that the
postprocessed forecast stays continuous where a source's horizon ends.
"""

__version__ = "0.1.0"
