from flask import current_app, jsonify, request

from app.api import bp
from app.errors import CasimirError, ConfigError, InvalidParameter
from app.models import (
    Averaging, DrudeParams, FrequencyShiftCurve, LifshitzSettings, MeasurementDataset, MeasurementPoint,
    OscillatorGeometry, PermittivityMode, PermittivitySpec, SigmaMode,
)
from app.physics.lifshitz import free_energy_per_area, thermal_correction
from app.physics.optics import eps_imag_axis
from app.physics.sphere_plate import eta, eta_corr, theory_curve
from app.physics.stats import chi2_survival, compare as compare_models

UM = 1e-6
NM = 1e-9


@bp.errorhandler(CasimirError)
def handle_casimir_error(e):
    return jsonify({'error': e.message, 'reason': e.reason}), e.http_status


def _payload():
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise InvalidParameter('No data provided')
    return data


def _number(data, field, default=None):
    value = data.get(field, default)
    if value is None:
        raise InvalidParameter(f'Missing required field: {field}')
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InvalidParameter(f'{field} must be a number, got {value!r}')


def _integer(data, field, default=None):
    value = _number(data, field, default)
    if value != int(value):
        raise InvalidParameter(f'{field} must be an integer, got {value!r}')
    return int(value)


def _pure_spec(mode, data):
    """PermittivitySpec for the analytic modes; tabulated modes need a table file"""
    mode = PermittivityMode.parse(mode)
    if mode.is_tabulated:
        raise ConfigError(f'{mode.value} needs an optical table; use the casimir eps/curve commands')
    drude = DrudeParams(_number(data, 'omega_p_ev', 7.54), _number(data, 'gamma_ev', 0.051))
    return PermittivitySpec(mode, drude)


def _settings(thermal):
    if not isinstance(thermal, dict):
        raise InvalidParameter('thermal must be an object')
    l_max = thermal.get('l_max')
    return LifshitzSettings(
        temperature=_number(thermal, 'temperature_k', 300.0),
        l_max=None if l_max in (None, 'auto') else _integer(thermal, 'l_max'),
        term_tolerance=_number(thermal, 'term_tolerance', 1e-6),
        k_quad_tolerance=_number(thermal, 'k_quad_tolerance', 1e-6),
        zero_t_mode=bool(thermal.get('zero_t_mode', False)),
        l_cap=_integer(thermal, 'l_cap', current_app.config['L_CAP']),
    )


@bp.route('/eps')
def get_eps():
    """eps(i xi) of an analytic permittivity mode"""
    values = [v for arg in request.args.getlist('xi') for v in arg.split(',') if v.strip()]
    if not values:
        raise InvalidParameter('Missing required field: xi')
    spec = _pure_spec(request.args.get('mode', PermittivityMode.PURE_DRUDE.value), request.args)
    try:
        xis = [float(v) for v in values]
    except ValueError:
        raise InvalidParameter(f'xi must be numbers, got {values}')
    return jsonify({
        'mode': spec.mode.value,
        'omega_p_ev': spec.drude.omega_p,
        'gamma_ev': spec.drude.gamma,
        'values': [{'xi_ev': xi, 'eps': eps_imag_axis(xi, spec)} for xi in xis],
    })


@bp.route('/eta', methods=['POST'])
def post_eta():
    """Vibration correction factors at one separation"""
    data = _payload()
    z = _number(data, 'z_nm') * NM
    a_rms = _number(data, 'a_rms_nm') * NM
    return jsonify({'eta': eta(z, a_rms), 'eta_corr': eta_corr(z, a_rms)})


@bp.route('/plate', methods=['POST'])
def post_plate():
    """Plate-plate free energy and pressure at one separation"""
    data = _payload()
    a = _number(data, 'a_nm') * NM
    spec = _pure_spec(data.get('mode', PermittivityMode.PURE_DRUDE.value), data)
    settings = _settings(data.get('thermal', {}))
    result = free_energy_per_area(a, spec, settings)
    body = {
        'mode': spec.mode.value,
        'a_nm': a / NM,
        'free_energy_j_m2': result.free_energy_per_area,
        'pressure_pa': result.pressure,
        'terms_used': result.terms_used,
        'est_error': result.est_error,
    }
    if data.get('thermal_correction') and not settings.zero_t_mode:
        body['thermal_correction'] = thermal_correction(a, spec, settings)
    return jsonify(body)


@bp.route('/curve', methods=['POST'])
def post_curve():
    """Frequency-shift curve of an analytic permittivity mode"""
    data = _payload()
    z_um = data.get('z_um')
    if not isinstance(z_um, list) or not z_um:
        raise InvalidParameter('Missing required field: z_um')
    if len(z_um) > current_app.config['MAX_GRID_POINTS']:
        raise InvalidParameter(f'at most {current_app.config["MAX_GRID_POINTS"]} separations per request')

    geometry = data.get('geometry')
    if not isinstance(geometry, dict):
        raise InvalidParameter('Missing required field: geometry')
    geom = OscillatorGeometry(
        sphere_radius=_number(geometry, 'r_sphere_um') * UM,
        resonance_frequency=_number(geometry, 'f0_hz'),
        spring_constant=_number(geometry, 'kappa_n_per_m'),
        a_rms=_number(geometry, 'a_rms_nm') * NM,
    )
    spec = _pure_spec(data.get('mode', PermittivityMode.PURE_DRUDE.value), data)
    averaging = Averaging.parse(data.get('averaging', Averaging.EXACT.value))
    z = sorted(_number({'z': v}, 'z') * UM for v in z_um)

    result = theory_curve(z, spec, _settings(data.get('thermal', {})), geom, averaging)
    return jsonify({
        'model': result.model_tag,
        'averaging': result.averaging_tag.value,
        'points': [
            {'z_um': p.z / UM, 'delta_f_hz': p.delta_f, 'z_delta_f_hz_um': p.z_delta_f / UM}
            for p in result.points
        ],
    })


@bp.route('/chi2-survival', methods=['POST'])
def post_chi2_survival():
    data = _payload()
    dof = data.get('dof')
    if dof is None:
        raise InvalidParameter('Missing required field: dof')
    return jsonify({'probability': chi2_survival(_number(data, 'chi2'), dof)})


def _rows(data, field, width):
    rows = data.get(field)
    if not isinstance(rows, list):
        raise InvalidParameter(f'Missing required field: {field}')
    for row in rows:
        if not isinstance(row, (list, tuple)) or len(row) not in width:
            raise InvalidParameter(f'{field} rows must have {" or ".join(map(str, width))} values')
    return rows


@bp.route('/compare', methods=['POST'])
def post_compare():
    """Chi-squared report of measured points against a theory curve"""
    data = _payload()
    theory_rows = _rows(data, 'theory', (2,))
    data_rows = _rows(data, 'data', (3, 4))
    if data.get('n_fit_params') is None:
        raise InvalidParameter('Missing required field: n_fit_params')

    try:
        theory_rows = sorted(theory_rows, key=lambda r: float(r[0]))
        data_rows = sorted(data_rows, key=lambda r: float(r[0]))
        theory = FrequencyShiftCurve.from_arrays(
            [float(r[0]) * UM for r in theory_rows], [float(r[1]) for r in theory_rows],
            data.get('model', 'theory'), Averaging.EXACT)
        points = tuple(
            MeasurementPoint(float(r[0]) * UM, float(r[1]), float(r[2]), float(r[3]) * UM if len(r) == 4 else None)
            for r in data_rows
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, CasimirError):
            raise
        raise InvalidParameter(f'non-numeric value in theory or data rows ({e})')

    reference = data.get('reference_bound')
    report = compare_models(
        MeasurementDataset(points, data.get('label', 'data')),
        theory,
        SigmaMode.parse(data.get('sigma_mode', SigmaMode.F_ONLY.value)),
        data['n_fit_params'],
        _number(data, 'threshold_sigma', 4.5),
        None if reference is None else _number(data, 'reference_bound'),
    )
    count, partial = report.subset_bound
    return jsonify({
        'model': report.model_tag,
        'chi2': report.chi2,
        'dof': report.dof,
        'probability': report.probability,
        'per_point': list(report.per_point),
        'sigma_mode': report.sigma_mode.value,
        'exclusion_count': count,
        'partial_chi2': partial,
        'probability_bound': report.probability_bound,
        'reference_bound': report.reference_bound,
        'exceeds_reference': report.exceeds_reference,
    })
