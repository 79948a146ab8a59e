#!/usr/bin/env python

import polyfair

params = polyfair.load_params('polyfair/scenarios/fig8_bounds.ini', {
    'out_dir': 'fig8_small',
    'servers': 1000,
    'sizes': [100, 100],
    'degrees': [10, 20],
    'epsilon': [0.05, 0.1],
    'alpha_points': 20,
    'format': 'csv+svg',
    'threads': 4,
})

polyfair.process(params)
