"""Gevrey-class simulator and certification harness for the 2D MHD boundary layer."""
__version__ = "0.1.0"
