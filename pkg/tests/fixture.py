"""
Builders shared by the test modules: default models, coarse search grids
and small Monte-Carlo sample counts that keep the suite quick.
"""

import io

import endslab
from endslab.heat import HeatConfig
from endslab.maximal import SearchConfig
from endslab.oracle import McConfig


def create_model(**overrides):
    """Model with default parameters, except for the given overrides."""
    return endslab.Model(endslab.ModelParams(**overrides))


def config_buffer(text):
    """Text buffer accepted by ModelParams.load."""
    return io.StringIO(text)


def coarse_search():
    return SearchConfig(grid_per_decade=8, center_grid_per_decade=8,
                        refine_iters=30)


def coarse_heat():
    return HeatConfig(t_min=1e-2, t_max=1e4, points_per_decade=4,
                      refine_iters=20)


def small_mc(seed=0, samples=20000, stratified=True):
    return McConfig(samples=samples, seed=seed, batch=5000,
                    stratified=stratified)
