"""Exception types shared across modules."""


class SkewfrontError(Exception):
    pass


class ConfigError(SkewfrontError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ValidationError(SkewfrontError, ValueError):
    pass


class ParseError(SkewfrontError, ValueError):
    pass


class DomainError(SkewfrontError, ValueError):
    pass


class InsufficientHorizonError(SkewfrontError):
    def __init__(self, message: str, required_n: int):
        super().__init__(f"{message} (need horizon >= {required_n})")
        self.required_n = required_n


class StabilityError(SkewfrontError):
    pass


class DomainTooSmallError(SkewfrontError):
    def __init__(self, message: str, suggested_L: float):
        super().__init__(f"{message}; try L >= {suggested_L:.1f}")
        self.suggested_L = suggested_L
