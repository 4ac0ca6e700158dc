"""Exception hierarchy.

Everything raised on purpose derives from :class:`PolyDynError`, and the
geometric degeneracies derive from :class:`DegenerateError` so callers (the
CLI in particular) can map them to a single exit status.
"""


class PolyDynError(ValueError):
    pass


class DegenerateError(PolyDynError):
    """Some configuration of points is too close to a coincidence."""


class DegenerateCrossRatio(DegenerateError):
    pass


class DegenerateTriple(DegenerateError):
    pass


class CoincidentAxis(DegenerateError):
    pass


class DegeneratePolygon(DegenerateError):
    pass


class DegenerateReconstruction(DegenerateError):
    pass


class DegenerateEdge(DegenerateError):
    pass


class DegenerateStep(DegenerateError):
    pass


class ParabolicStep(DegenerateStep):
    """The two flat-dynamics branches coincide."""


class ExcludedParameter(PolyDynError):
    """Scaling parameter sits on one of the poles of the group action."""


class ZeroPolynomial(PolyDynError):
    pass


class NoCyclicPlacement(PolyDynError):
    pass
