from enum import Enum, auto


class Severity(Enum):
    """Severity of a configuration diagnostic."""

    ERROR = auto()
    WARNING = auto()

    def __str__(self):
        return self.name


class Verdict(Enum):
    """Outcome of the adiabatic-elimination validity check."""

    PASS = "pass"
    MARGINAL = "marginal"
    FAIL = "fail"

    def __str__(self):
        return self.value


class SpectrumMode(Enum):
    EXACT = "exact"
    POLARITON = "polariton"
    EXACT_LASER_FRAME = "exact-laser-frame"  # re-evaluates M~ per laser frequency

    def __str__(self):
        return self.value


class InitialState(Enum):
    VACUUM = "vacuum"
    A_EXCITED = "a-excited"
    COHERENT = "coherent"
    SUPERPOSITION = "superposition"  # (|g> + |A excited>)/sqrt(2), keeps <sigma_A> nonzero

    def __str__(self):
        return self.value


class ModelKind(Enum):
    FULL = "full"
    EFFECTIVE = "effective"

    def __str__(self):
        return self.value
