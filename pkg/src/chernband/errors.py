"""Exception hierarchy shared by all chernband modules."""


class ChernbandError(Exception):
    """Base class for every error raised by the package."""


class IncompatibleSpinError(ChernbandError, ValueError):
    """Two objects built for different spins were combined."""


class SpecError(ChernbandError, ValueError):
    """A Hamiltonian specification failed validation."""


class NonHermitianError(ChernbandError, ValueError):
    """Matrix is not Hermitian within tolerance."""

    def __init__(self, asymmetry: float, location: tuple[int, int]):
        self.asymmetry = asymmetry
        self.location = location
        super().__init__(
            f"matrix not Hermitian: |A - A^H| = {asymmetry:.3e} at entry {location}"
        )


class ClusteringAmbiguityError(ChernbandError):
    """The spectrum does not split cleanly into the requested number of bands.

    ``used_gap`` is the smallest gap selected as a band boundary and
    ``competing_gap`` the largest gap that was not selected.
    """

    def __init__(self, used_gap: float, competing_gap: float, message: str = ""):
        self.used_gap = used_gap
        self.competing_gap = competing_gap
        msg = message or "ambiguous band clustering"
        self.reason = msg
        super().__init__(f"{msg}: used gap {used_gap:.6g} vs competing gap {competing_gap:.6g}")


class DegeneracyError(ChernbandError):
    """Eigenvalue collision: band index undefined at ``point``."""

    def __init__(self, point, gap: float, message: str = ""):
        self.point = point
        self.gap = gap
        msg = message or "eigenvalue degeneracy"
        super().__init__(f"{msg} at {point} (gap {gap:.3e})")


class NonAdmissibleError(ChernbandError):
    """Mesh too coarse for a reliable Berry-phase sum, even after refinement."""


class WindingError(ChernbandError):
    """Winding number undefined or undersampled along the requested circle."""


class MeshTooCoarseError(ChernbandError):
    """Distinct zeros are closer than the winding circle radius."""


class ConicalContactError(ChernbandError):
    """A zero of h12 coincides with h22 == h11, so the index is undefined there."""

    def __init__(self, point):
        self.point = point
        super().__init__(f"conical contact (h12 = h22 - h11 = 0) at {point}")
