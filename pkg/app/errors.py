class CasimirError(Exception):
    """Base class for every failure the pipeline reports to its callers"""
    exit_code = 3
    reason = 'error'
    http_status = 500

    def __init__(self, message=None):
        super().__init__(message or self.__class__.__doc__)

    @property
    def message(self):
        return str(self)

    def one_line(self):
        """Single machine-parsable line: '<reason>: <message>'"""
        text = ' '.join(self.message.split())
        return f'{self.reason}: {text}'


class InputError(CasimirError, ValueError):
    """Invalid input data or configuration"""
    exit_code = 2
    reason = 'input-error'
    http_status = 400


class ComputationError(CasimirError, ArithmeticError):
    """Numerical failure or out-of-range evaluation"""
    exit_code = 3
    reason = 'computation-error'
    http_status = 422


# Input errors

class ConfigError(InputError):
    """Invalid run configuration"""
    reason = 'config-error'


class DataFormatError(InputError):
    """Malformed data file"""
    reason = 'data-format'


class InvalidParameter(InputError):
    """Parameter outside its valid range"""
    reason = 'invalid-parameter'


class EmptyTable(InputError):
    """Optical table needs at least two rows"""
    reason = 'empty-table'


class NonMonotonicEnergy(InputError):
    """Photon energies must be strictly increasing"""
    reason = 'non-monotonic-energy'


class NegativeImEps(InputError):
    """Imaginary part of the permittivity must be non-negative"""
    reason = 'negative-im-eps'


class NonpositiveFrequency(InputError):
    """Frequency must be positive"""
    reason = 'nonpositive-frequency'


class NonpositiveXi(InputError):
    """Imaginary frequency must be positive"""
    reason = 'nonpositive-xi'


class SeparationNonpositive(InputError):
    """Separation must be positive"""
    reason = 'separation-nonpositive'


class AmplitudeExceedsSeparation(InputError):
    """Vibration amplitude reaches the surface"""
    reason = 'amplitude-exceeds-separation'


class MissingSigmaZ(InputError):
    """Combined sigma mode needs sigma_z on every point"""
    reason = 'missing-sigma-z'


class InvalidDof(InputError):
    """Degrees of freedom must be a positive integer"""
    reason = 'invalid-dof'


# Computation errors

class QuadratureNonConvergent(ComputationError):
    """Quadrature did not reach the requested tolerance"""
    reason = 'quadrature-nonconvergent'


class TruncationNotConverged(ComputationError):
    """Matsubara sum hit its cap before converging"""
    reason = 'truncation-not-converged'


class SeriesNonConvergent(ComputationError):
    """Special-function expansion did not converge"""
    reason = 'series-nonconvergent'


class CurveRangeMismatch(ComputationError):
    """Theory curve does not cover a data separation"""
    reason = 'curve-range-mismatch'

    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f'theory curve does not cover z = {z * 1e6:.6g} um')
