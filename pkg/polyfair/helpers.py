#
# Common helper functions for polyfair
#

import csv
import functools
import io
import math
import os
import sys
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np

LOG_SILENT = False

# tolerance applied to every rank comparison
REL_TOL = 1e-9
ABS_TOL = 1e-12


def silence_log(b):
    """
    Turns on logging silent mode w.r.t. to log_stderr and log_stdout
    """
    global LOG_SILENT
    LOG_SILENT = b


def log_stderr(s, width=76, comment=True):
    """
    Wrapper for all stderr out. Allows future customization.
    """
    if LOG_SILENT:
        return
    if s and s[-1] != "\n":
        s += "\n"
    if comment and not s.startswith("#"):
        s = "# " + s
    sys.stderr.write(s)


def log_stdout(s, width=76):
    """
    Wrapper for all stdout output. Allows future customization.
    """
    if LOG_SILENT:
        return
    print(s)


def isclose(a, b):
    return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL)


def slack(*values):
    """
    Absolute slack allowed when comparing sums of the given rank values.
    """
    scale = max([abs(v) for v in values] + [0.0])
    return max(REL_TOL * scale, ABS_TOL)


def popcount(mask):
    return bin(mask).count("1")


def members(mask):
    """
    Indices (0-based) of the bits set in mask, in ascending order.
    """
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(indices):
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def format_subset(mask):
    """
    Human readable, 1-based rendering of a subset bitmask, eg. {1,3}.
    """
    return "{" + ",".join(str(i + 1) for i in members(mask)) + "}"


def format_profile(a):
    return "(" + ",".join(str(int(x)) for x in a) + ")"


@functools.lru_cache(maxsize=8)
def popcounts(n):
    """
    Array of popcounts of all the 2^n bitmasks.
    """
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts[1 << i:1 << (i + 1)] = counts[:1 << i] + 1
    return counts


@functools.lru_cache(maxsize=8)
def subset_shells(n):
    """
    The 2^n bitmasks grouped by popcount: shells[s] holds every mask
    with s elements, in increasing order.
    """
    counts = popcounts(n)
    order = np.argsort(counts, kind='stable')
    bounds = np.searchsorted(counts[order], np.arange(n + 2))
    return [order[bounds[s]:bounds[s + 1]] for s in range(n + 1)]


GridLayout = namedtuple('GridLayout', ['shape', 'coords', 'strides', 'shells'])


@functools.lru_cache(maxsize=16)
def grid_layout(shape):
    """
    Flattened layout of the grid prod_k {0..shape[k]-1} used by the
    shell-ordered recursions: coordinates of each flat index, the flat
    stride of each axis, and the flat indices grouped by total count
    (cells of shell s only ever depend on cells of shell s-1).
    """
    shape = tuple(int(s) for s in shape)
    coords = np.indices(shape).reshape(len(shape), -1)
    coords.setflags(write=False)
    strides = tuple(int(np.prod(shape[k + 1:])) for k in range(len(shape)))
    total = coords.sum(axis=0)
    n_shells = int(total[-1]) + 1 if total.size else 1
    order = np.argsort(total, kind='stable')
    bounds = np.searchsorted(total[order], np.arange(n_shells + 1))
    shells = tuple(order[bounds[s]:bounds[s + 1]] for s in range(n_shells))
    return GridLayout(shape, coords, strides, shells)


def format_float(x):
    """
    Deterministic 17 significant digit rendering used in every CSV.
    """
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def csv_text(header, rows):
    """
    Renders a CSV table (comma separated, header always present) to a
    string. Floats are formatted with format_float.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            format_float(v) if isinstance(v, (float, np.floating)) else v
            for v in row])
    return buf.getvalue()


def write_artifacts(out_dir, artifacts):
    """
    Writes a dictionary of {filename: text} into out_dir, creating it
    if necessary. Returns the list of written paths.
    """
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    written = []
    for name in sorted(artifacts):
        path = os.path.join(out_dir, name)
        with open(path, 'w', newline='') as f:
            f.write(artifacts[name])
        written.append(path)
    return written


def thread_map(func, items, threads=1):
    """
    map() that runs on a thread pool when threads > 1. Results keep the
    order of items.
    """
    items = list(items)
    if not threads or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def format_table(header, rows):
    """
    Left aligned plain text table for the summary, floats with 6
    significant digits.
    """
    cells = [[str(h) for h in header]]
    for row in rows:
        cells.append(["%.6g" % v if isinstance(v, (float, np.floating))
                      else str(v) for v in row])
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    return ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip()
            for r in cells]
