"""CSV readers and writers for optical tables, datasets, roughness histograms and curves.

Input files are delimited text with a header row; `#` starts a comment.
Comma and semicolon separators are both accepted. Columns carry their unit
in the name (z_um, delta_f_hz, ...); values are converted to SI on reading.
"""
import logging
import math
import os

import numpy as np
import pandas as pd

from app.errors import ConfigError, DataFormatError, EmptyTable
from app.models import Averaging, FrequencyShiftCurve, MeasurementDataset, MeasurementPoint
from app.physics.optics import load_optical_table

logger = logging.getLogger(__name__)

UM = 1e-6
NM = 1e-9
FLOAT_FORMAT = '%.12g'


def _detect_separator(path):
    with open(path, encoding='utf-8') as handle:
        sample = ''.join(line for line in handle.readlines()[:20] if not line.lstrip().startswith('#'))
    if ';' in sample and sample.count(';') > sample.count(','):
        return ';'
    return ','


def _read_frame(path, required, optional=(), what='data file'):
    """Numeric DataFrame with the required columns (plus any optional ones present)"""
    if not os.path.isfile(path):
        raise ConfigError(f'{what} not found: {path}')
    try:
        df = pd.read_csv(path, sep=_detect_separator(path), comment='#', skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError(f'{what} {path} is empty')
    except pd.errors.ParserError as e:
        raise DataFormatError(f'{what} {path}: {e}')
    except UnicodeDecodeError as e:
        raise DataFormatError(f'{what} {path} is not UTF-8 text: {e}')

    df.columns = [str(c).strip().lower() for c in df.columns]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise DataFormatError(f'{what} {path} lacks column(s) {", ".join(missing)}')

    columns = list(required) + [c for c in optional if c in df.columns]
    df = df[columns].dropna(how='all').reset_index(drop=True)
    try:
        df = df.apply(pd.to_numeric)
    except (ValueError, TypeError) as e:
        raise DataFormatError(f'{what} {path}: non-numeric value ({e})')
    if df[list(required)].isna().any().any():
        row = int(df[list(required)].isna().any(axis=1).idxmax())
        raise DataFormatError(f'{what} {path}: missing value in data row {row + 1}')
    return df


def read_optical_table(path):
    """Optical table from `energy_ev,n,k` or `energy_ev,im_eps` columns"""
    df = _read_frame(path, ('energy_ev',), ('n', 'k', 'im_eps'), what='optical table')
    if 'n' in df.columns and 'k' in df.columns:
        df = df[['energy_ev', 'n', 'k']]
    elif 'im_eps' in df.columns:
        df = df[['energy_ev', 'im_eps']]
    else:
        raise DataFormatError(f'optical table {path} needs n,k or im_eps columns')
    if df.isna().any().any():
        raise DataFormatError(f'optical table {path} has missing values')
    if df.empty:
        raise EmptyTable(f'optical table {path} has no rows')
    table = load_optical_table(df.itertuples(index=False, name=None), source_label=os.path.basename(path))
    logger.info(f'Optical table {path}: {len(table)} points, {table.omega_min:g}-{table.omega_max:g} eV')
    return table


def read_dataset(path, label=None):
    """Measurement dataset from `z_um,delta_f_hz,sigma_f_hz[,sigma_z_um]` columns"""
    df = _read_frame(path, ('z_um', 'delta_f_hz', 'sigma_f_hz'), ('sigma_z_um',), what='dataset')
    backwards = df['z_um'].diff() < 0
    if backwards.any():
        row = int(backwards.idxmax())
        raise DataFormatError(f'dataset {path}: z_um decreases at data row {row + 1}')
    has_sigma_z = 'sigma_z_um' in df.columns
    points = []
    for row in df.itertuples(index=False):
        sigma_z = None
        if has_sigma_z and not math.isnan(row.sigma_z_um):
            sigma_z = row.sigma_z_um * UM
        points.append(MeasurementPoint(row.z_um * UM, float(row.delta_f_hz), float(row.sigma_f_hz), sigma_z))
    dataset = MeasurementDataset(tuple(points), label or os.path.splitext(os.path.basename(path))[0])
    logger.info(f'Dataset {path}: {len(dataset)} points')
    return dataset


def read_roughness(path):
    """Height distribution (h in m, weight) from `h_nm,weight` columns, weights normalised"""
    df = _read_frame(path, ('h_nm', 'weight'), what='roughness histogram')
    if df.empty:
        raise DataFormatError(f'roughness histogram {path} has no rows')
    if (df['weight'] < 0).any():
        raise DataFormatError(f'roughness histogram {path} has negative weights')
    total = math.fsum(df['weight'].tolist())
    if not total > 0.0:
        raise DataFormatError(f'roughness histogram {path}: weights sum to zero')
    weights = [w / total for w in df['weight'].tolist()]
    # absorb the normalisation residue in the largest bin
    largest = int(np.argmax(weights))
    weights[largest] += 1.0 - math.fsum(weights)
    return tuple((h * NM, w) for h, w in zip(df['h_nm'].tolist(), weights))


def _write_frame(df, path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f'Wrote {path}')
    return path


def write_curve(curve: FrequencyShiftCurve, path):
    df = pd.DataFrame({
        'z_um': curve.z / UM,
        'delta_f_hz': curve.delta_f,
        'z_delta_f_hz_um': [p.z_delta_f / UM for p in curve.points],
    })
    return _write_frame(df, path)


def read_curve(path, model_tag=None, averaging=Averaging.EXACT):
    """Theory curve previously written by write_curve"""
    df = _read_frame(path, ('z_um', 'delta_f_hz'), what='theory curve')
    if df.empty:
        raise DataFormatError(f'theory curve {path} has no rows')
    stem = os.path.splitext(os.path.basename(path))[0]
    tag = model_tag or (stem[len('curve_'):] if stem.startswith('curve_') else stem)
    return FrequencyShiftCurve.from_arrays((df['z_um'] * UM).tolist(), df['delta_f_hz'].tolist(), tag, averaging)


def write_eps_table(xi_values, eps_values, path):
    df = pd.DataFrame({'xi_ev': np.asarray(xi_values, dtype=float), 'eps': np.asarray(eps_values, dtype=float)})
    return _write_frame(df, path)


def write_report(report, path):
    """Per-point chi2 contributions of a Chi2Report"""
    df = pd.DataFrame({
        'z_um': np.asarray(report.z) / UM,
        'delta_f_hz': report.data,
        'theory_hz': report.theory,
        'sigma_eff_hz': report.sigma_eff,
        'contribution': report.per_point,
    })
    return _write_frame(df, path)
