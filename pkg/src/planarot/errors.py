"""Exception types raised by planarot."""


class PlanarOTError(Exception):
    pass


class ZeroDisplacement(PlanarOTError, ValueError):
    """A face lookup was requested for the zero vector."""


class PointNotInK(PlanarOTError, ValueError):
    pass


class Infeasible(PlanarOTError):
    """No transport plan with finite cost exists.

    ``witness`` holds a Hall-type cut when one was found: a dict with the
    source indices, their admissible target neighbourhood and both masses.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class TooLarge(PlanarOTError, ValueError):
    pass


class NotApplicable(PlanarOTError, ValueError):
    pass


class MassImbalance(PlanarOTError, RuntimeError):
    pass
