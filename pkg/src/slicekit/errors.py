"""Exception hierarchy shared by all pipeline stages."""


class SlicekitError(Exception):
    """Base class for all domain errors."""


# --- catalog / file loading ---------------------------------------------

class ParseError(SlicekitError):
    """A descriptor or infrastructure file is malformed or fails its schema."""


class DanglingRef(SlicekitError):
    """An identifier points at nothing in the loaded catalog."""


class CyclicNesting(SlicekitError):
    """Nested network services form a reference cycle."""


class NestedTripletMissing(SlicekitError):
    """A composite instantiation level omits the triplet choice for a nested NS."""


# --- infrastructure ------------------------------------------------------

class UnknownPop(SlicekitError):
    pass


class UnknownWanLink(SlicekitError):
    pass


# --- ordering ------------------------------------------------------------

class UnknownTemplate(SlicekitError):
    pass


class UnknownTenant(SlicekitError):
    pass


class UnknownOrder(SlicekitError):
    pass


class UnknownSlice(SlicekitError):
    """The order exists but has no commissioned slice runtime behind it."""


class ForbiddenAttribute(SlicekitError):
    """Tenant tried to customize an attribute the provider does not expose."""

    def __init__(self, path: str):
        super().__init__(f"attribute not customizable: {path}")
        self.path = path


class OutOfRange(SlicekitError):
    """Override value falls outside the advertised range for its attribute."""

    def __init__(self, path: str, value, allowed: str):
        super().__init__(f"{path}={value!r} outside allowed {allowed}")
        self.path = path
        self.value = value
        self.allowed = allowed


class IllegalTransition(SlicekitError):
    """Order status change not in the declared successor relation."""

    def __init__(self, current: str, target: str):
        super().__init__(f"illegal status transition {current} -> {target}")
        self.current = current
        self.target = target


# --- slice design ----------------------------------------------------------

class UncoverableTopology(SlicekitError):
    """Some topology node tag is matched by no catalog descriptor."""


class AmbiguousCover(UserWarning):
    """Two descriptors tie for the maximal topology match; lowest id wins."""


class NoFlavorMatches(SlicekitError):
    """No flavor of the descriptor provides the required functional tags."""


class NoIlMeetsPerformance(SlicekitError):
    """No instantiation level of any matching flavor reaches the required capacity."""


# --- admission / placement -------------------------------------------------

class EmptyCandidateSet(SlicekitError):
    """Some VNF instance has zero candidate PoPs (geolocation/reliability gap)."""

    def __init__(self, instance: str, detail: str):
        super().__init__(f"no candidate PoP for {instance}: {detail}")
        self.instance = instance
        self.detail = detail


class NoFeasibleSolution(SlicekitError):
    """Defensive: optimizer invoked although admission found no solution."""


class CapacityRaced(SlicekitError):
    """Residual capacity changed between the admission snapshot and the commit."""


# --- lifecycle ---------------------------------------------------------------

class OutsideActiveWindow(SlicekitError):
    """Activation requested at an instant not covered by any active window."""


class ScalingRaced(SlicekitError):
    """Scale-up reservation delta could not be committed (capacity gone)."""


class ExposureViolation(SlicekitError):
    """Management query outside the operational requirements of the order."""

    def __init__(self, what: str):
        super().__init__(f"not exposed to this tenant: {what}")
        self.what = what
