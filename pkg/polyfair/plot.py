#
# Line charts of the bound curves, drawn with matplotlib and written as
# SVG documents.
#

import io
import math

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

GOLDEN_RATIO = (math.sqrt(5) - 1.0) / 2.0

# prefix of the SVG group id of every curve
GID_PREFIX = 'curve-'


def new_figure(width=8, height=None):
    if not height:
        height = width * GOLDEN_RATIO
    fig, ax = plt.subplots(figsize=(width, height), facecolor='w')
    return fig, ax


def line_chart(series, title="", x_label="", y_label="", log_y=False):
    """
    Draws series of (label, xs, ys, dashed) on one axis and returns the
    figure. Non-finite points leave a gap in their curve. Series are
    colored in pairs, a lower curve and the upper curve after it, and
    curve i carries the SVG id 'curve-i'.
    """
    fig, ax = new_figure()
    for index, (label, xs, ys, dashed) in enumerate(series):
        ys = np.array(ys, dtype=float)
        ys[~np.isfinite(ys)] = np.nan
        line, = ax.plot(xs, ys, color='C%d' % ((index // 2) % 10),
                        linestyle='--' if dashed else '-', label=label)
        line.set_gid('%s%d' % (GID_PREFIX, index))
    if log_y:
        ax.set_yscale('log', nonpositive='mask')
    ax.set_title(title)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    if series:
        ax.legend(fontsize='small', loc='best')
    fig.tight_layout()
    return fig


def svg_text(fig):
    """Renders the figure as an SVG document string and closes it."""
    buf = io.StringIO()
    try:
        fig.savefig(buf, format='svg', metadata={'Date': None})
    finally:
        plt.close(fig)
    return buf.getvalue()
