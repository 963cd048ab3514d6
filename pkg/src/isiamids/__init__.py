"""Two-layer cascaded network intrusion detection in numpy.

Layer one filters traffic through three binary detectors (gradient-boosted
trees, a Siamese encoder and a feed-forward network); anything flagged as an
attack is assigned an attack family by a multiclass gradient-boosted model.
"""

__version__ = "0.1.0"
