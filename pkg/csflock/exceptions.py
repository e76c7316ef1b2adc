class ConfigError(ValueError):
    pass


class MeanVelocityError(ConfigError):
    pass


class UnsupportedError(ConfigError):
    pass


class GridMismatchError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class CFLError(NumericalError):
    pass


class VacuumError(NumericalError):
    pass


class OutputError(RuntimeError):
    pass
