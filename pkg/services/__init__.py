"""
Mask generation, sparse bodies, MAC accounting, the SR pipeline and bench sweeps
"""
