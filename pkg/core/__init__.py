"""
Tensor kernels, netpbm codec, AMSRW1 weight container and the error hierarchy
"""
