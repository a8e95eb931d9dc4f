"""Batch commands: eps, curve and compare.

Run as `flask casimir <command>` or `python run.py <command>`. Exit codes:
0 success, 2 configuration or input error, 3 computation or range error.
"""
import logging
import os
import sys
from functools import wraps

import click
import numpy as np
from flask import current_app
from flask.cli import AppGroup

from app.datafiles import read_curve, read_dataset, write_curve, write_eps_table, write_report
from app.errors import CasimirError, ConfigError
from app.figures import render_svg
from app.models import Averaging, FigureSpec, PermittivityMode
from app.physics.optics import eps_grid, log_xi_grid
from app.physics.sphere_plate import convergence_check, correct_dataset, separation_grid, theory_curve
from app.physics.stats import compare as compare_models
from app.runconfig import load_run_config

logger = logging.getLogger(__name__)

cli = AppGroup('casimir', help='Casimir frequency-shift pipeline.')

CONVERGENCE_LIMIT = 1e-3


def reports_errors(f):
    """Turn pipeline errors into one stderr line and the matching exit code"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except CasimirError as e:
            click.echo(e.one_line(), err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            click.echo(f'io-error: {e}', err=True)
            sys.exit(2)
    return decorated_function


def _setup_logging(level):
    level = (level or current_app.config['LOG_LEVEL']).upper()
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.getLogger('app').setLevel(level)


def _load(config_path):
    return load_run_config(
        config_path,
        l_cap=current_app.config['L_CAP'],
        out_dir=current_app.config['OUTPUT_DIR'],
    )


def _modes(run, mode_options):
    modes = [PermittivityMode.parse(m) for m in mode_options] or list(run.optics.modes)
    if not modes:
        raise ConfigError('no permittivity mode given (use --mode or [optics] mode)')
    return modes


def _out_dir(run, out):
    return out or run.output.out_dir


def _style(mode):
    return 'solid' if mode.is_tabulated else 'dashed'


def _dataset(run):
    stats = run.require_stats()
    dataset = read_dataset(stats.dataset_path)
    if run.correction is not None:
        geometry = run.require_geometry()
        c = run.correction
        dataset = correct_dataset(dataset, geometry.a_rms, c.which, c.direction, c.recorrect_dataset)
        logger.info(f'Dataset separations corrected ({c.which.value}, {c.direction.value}, '
                    f'recorrect={c.recorrect_dataset})')
    return dataset


config_option = click.option('--config', 'config_path', required=True, type=click.Path(dir_okay=False),
                             help='INI run configuration.')
mode_option = click.option('--mode', 'modes', multiple=True, help='Permittivity mode; repeatable.')
out_option = click.option('--out', type=click.Path(file_okay=False), default=None, help='Output directory.')
log_option = click.option('--log-level', default=None,
                          type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False))


@cli.command('eps')
@config_option
@mode_option
@out_option
@log_option
@reports_errors
def eps(config_path, modes, out, log_level):
    """Tabulate eps(i xi) over the configured xi grid."""
    _setup_logging(log_level)
    run = _load(config_path)
    grid = run.grid
    xi = log_xi_grid(grid.xi_min, grid.xi_max, grid.xi_points)
    if grid.xi_list:
        xi = np.unique(np.concatenate((xi, grid.xi_list)))

    out_dir = _out_dir(run, out)
    for mode in _modes(run, modes):
        spec = run.permittivity(mode)
        path = write_eps_table(xi, eps_grid(xi, spec), os.path.join(out_dir, f'eps_{mode.value}.csv'))
        click.echo(path)


@cli.command('curve')
@config_option
@mode_option
@click.option('--averaging', type=click.Choice([a.value for a in Averaging]), default=Averaging.EXACT.value)
@out_option
@click.option('--check-convergence', is_flag=True, help='Recompute with refined settings and report the change.')
@log_option
@reports_errors
def curve(config_path, modes, averaging, out, check_convergence, log_level):
    """Frequency shift against separation, one CSV per mode plus an SVG."""
    _setup_logging(log_level)
    run = _load(config_path)
    geometry = run.require_geometry()
    grid = run.grid
    if grid.z_min is None or grid.points < 1:
        raise ConfigError('[grid] z_min_um and points are required for curve')
    z_grid = separation_grid(grid.z_min, grid.z_max, grid.points, grid.spacing)
    modes = _modes(run, modes)

    out_dir = _out_dir(run, out)
    curves = []
    for mode in modes:
        spec = run.permittivity(mode)
        logger.info(f'Computing {mode.value} over {len(z_grid)} separations ({averaging})')
        result = theory_curve(z_grid, spec, run.thermal, geometry, averaging)
        click.echo(write_curve(result, os.path.join(out_dir, f'curve_{mode.value}.csv')))
        curves.append((result, _style(mode)))

        if check_convergence:
            change = convergence_check(z_grid, spec, run.thermal, geometry, averaging)
            click.echo(f'{mode.value}: max relative change under refinement {change:.2e}')
            if change >= CONVERGENCE_LIMIT:
                logger.warning(f'{mode.value}: refinement changes delta_f by {change:.2e}')

    if run.output.svg:
        overlay = _dataset(run) if run.stats is not None else None
        figure = FigureSpec(tuple(curves), overlay, title=f'{averaging} averaging')
        click.echo(render_svg(figure, os.path.join(out_dir, 'curves.svg')))


def _format_report(report, threshold_sigma):
    count, partial = report.subset_bound
    lines = [
        f'model: {report.model_tag}',
        f'sigma mode: {report.sigma_mode.value}',
        f'points: {len(report)} (outside window: {report.n_outside_window})',
        f'chi2: {report.chi2:.4g}',
        f'dof: {report.dof}',
        f'probability: {100.0 * report.probability:.3g}%',
        f'exclusion subset: {count} points >= {threshold_sigma:g} sigma, partial chi2 {partial:.4g}',
        f'probability bound: {100.0 * report.probability_bound:.3g}%',
    ]
    if report.reference_bound is not None:
        verdict = 'exceeded' if report.exceeds_reference else 'not exceeded'
        lines.append(f'reference bound: {report.reference_bound:g} {verdict}')
    return '\n'.join(lines)


@cli.command('compare')
@config_option
@mode_option
@click.option('--averaging', type=click.Choice([a.value for a in Averaging]), default=Averaging.EXACT.value)
@out_option
@log_option
@reports_errors
def compare(config_path, modes, averaging, out, log_level):
    """Chi-squared comparison of theory against the configured dataset."""
    _setup_logging(log_level)
    run = _load(config_path)
    stats = run.require_stats()
    if stats.n_fit_params is None:
        raise ConfigError('[stats] n_fit_params is required for compare')
    dataset = _dataset(run)

    if stats.theory_curve_path is not None:
        theories = [read_curve(stats.theory_curve_path, averaging=averaging)]
    else:
        geometry = run.require_geometry()
        inside, _ = dataset.window(*stats.z_window)
        theories = [
            theory_curve(inside.z, run.permittivity(mode), run.thermal, geometry, averaging)
            for mode in _modes(run, modes)
        ]

    out_dir = _out_dir(run, out)
    for i, theory in enumerate(theories):
        report = compare_models(
            dataset, theory, stats.sigma_mode, stats.n_fit_params, stats.threshold_sigma,
            stats.reference_bounds.get(theory.model_tag), stats.z_window,
        )
        if i:
            click.echo('')
        click.echo(_format_report(report, stats.threshold_sigma))
        write_report(report, os.path.join(out_dir, f'report_{theory.model_tag}.csv'))
