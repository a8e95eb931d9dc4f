"""SVG rendering of frequency-shift curves: z (um) against z * delta_f (Hz um)."""
import logging
import os

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.models import FigureSpec  # noqa: E402

logger = logging.getLogger(__name__)

UM = 1e-6

STYLES = {
    'solid': {'ls': '-', 'lw': 1.4},
    'dashed': {'ls': '--', 'lw': 1.2},
}


def render_svg(spec: FigureSpec, path):
    """Write the figure as SVG; the output depends only on spec"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with plt.rc_context({'svg.hashsalt': 'casimir-fs', 'svg.fonttype': 'none', 'figure.figsize': [5.0, 3.8]}):
        fig, ax = plt.subplots()
        for curve, style in spec.curves:
            z_um = curve.z / UM
            ax.plot(z_um, z_um * curve.delta_f, label=curve.model_tag, c='k', **STYLES.get(style, STYLES['solid']))

        if spec.overlay is not None and len(spec.overlay):
            data = spec.overlay
            z_um = data.z / UM
            delta_f = np.array([p.delta_f for p in data.points])
            sigma_f = np.array([p.sigma_f for p in data.points])
            sigma_z = np.array([(p.sigma_z or 0.0) / UM for p in data.points])
            # crosses: horizontal arm sigma_z, vertical arm sigma_f, both scaled by z
            ax.errorbar(z_um, z_um * delta_f, xerr=sigma_z, yerr=z_um * sigma_f,
                        fmt='none', ecolor='tab:red', elinewidth=0.9, label=data.label or 'data')

        ax.set_xlabel('z [μm]')
        ax.set_ylabel('z·Δf [Hz·μm]')
        if spec.title:
            ax.set_title(spec.title)
        ax.grid(True, ls=':', lw=0.6, alpha=0.6)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)

    logger.info(f'Wrote {path}')
    return path
