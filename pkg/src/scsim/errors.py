"""Exception hierarchy shared by all scsim modules."""


class ScsimError(Exception):
    """Base class for all scsim errors."""


class RangeError(ScsimError, ValueError):
    """Quantized value outside the representable range of its bitstream length."""


class ConfigError(ScsimError, ValueError):
    """Invalid parameter or configuration (lengths, strides, gate costs, ...)."""


class EncodingError(ScsimError, ValueError):
    """Bit pattern is not a legal code word (e.g. the ternary pair '01')."""


class ScaleError(ScsimError, ValueError):
    """Scale factors disagree where the hardware requires them to match."""


class SizeError(ScsimError, ValueError):
    """Bit-vector length does not match the consuming block's width."""


class CanonicalError(ScsimError, ValueError):
    """Operation requires a sorted (thermometer) stream but got an unsorted one."""


class MonotonicityError(ScsimError, ValueError):
    """Activation function sampled as decreasing; only monotone steps are realizable."""


class ParseError(ScsimError, ValueError):
    """Model/tensor/config file is not syntactically valid."""


class ValidationError(ScsimError, ValueError):
    """Model/tensor/config file parsed but violates the schema or its invariants."""
