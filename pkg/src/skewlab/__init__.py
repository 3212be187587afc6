"""skewlab: numerical certification of twistor geometries with skew torsion."""

__version__ = "0.1.0"
