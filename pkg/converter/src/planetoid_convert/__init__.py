from .convert import ConvertError, convert

__all__ = ["ConvertError", "convert"]
__version__ = "0.1.0"
