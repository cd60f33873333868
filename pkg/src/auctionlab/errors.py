class AuctionLabError(Exception):
    """Base class for every error raised by auctionlab."""

    exit_code = 1


class ConfigInvalid(AuctionLabError, ValueError):
    exit_code = 2


class AssumptionViolated(AuctionLabError):
    exit_code = 3


class OutOfSupport(AssumptionViolated, ValueError):
    pass


class DegenerateDensity(AssumptionViolated):
    pass


class NotUnimodal(AssumptionViolated):
    pass


class NonMonotone(AssumptionViolated):
    pass


class InvalidThresholds(AssumptionViolated, ValueError):
    pass


class NoRoot(AssumptionViolated):
    pass


class NoCrossing(AssumptionViolated):
    pass


class EmptySample(AuctionLabError, ValueError):
    exit_code = 2


class AcceptanceFailure(AuctionLabError):
    exit_code = 4
