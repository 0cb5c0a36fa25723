class IsospecError(ValueError):
    """Base class for input errors raised by this package."""


class DimensionError(IsospecError):
    pass


class RankDeficiencyError(IsospecError):
    def __init__(self, index: int, pivot: float):
        super().__init__(f"input {index} is linearly dependent on earlier inputs (pivot {pivot:.3e})")
        self.index = index
        self.pivot = pivot


class CapExceededError(IsospecError):
    pass


class ConfigError(IsospecError):
    pass


class SampleDataError(IsospecError):
    pass
