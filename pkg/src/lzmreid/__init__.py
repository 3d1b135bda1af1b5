"""Local Zernike moment features and ECN re-ranking for visible-infrared retrieval."""

__version__ = "0.1.0"
