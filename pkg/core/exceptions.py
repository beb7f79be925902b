"""
Domain exceptions and their CLI exit codes
"""

class AmsrError(Exception):
    """Base class for all engine errors"""
    exit_code = 1

class ShapeMismatchError(AmsrError, ValueError):
    """Channel, shape, divisibility or chaining violation"""
    exit_code = 3

class InputFormatError(AmsrError):
    """Malformed or out-of-range input data"""
    exit_code = 3

class WeightFormatError(InputFormatError):
    """Corrupt AMSRW1 weight container"""

class ModelBindingError(AmsrError):
    """Model spec could not be bound to the weight store"""
    exit_code = 4
