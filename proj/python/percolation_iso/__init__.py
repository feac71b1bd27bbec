"""Bernoulli percolation clusters: isoperimetry, spectra, heat kernels and walks."""

from ._core import (
    CapExceeded,
    ClusterGraph,
    Configuration,
    ContractError,
    EmptyCluster,
    Model,
    NumericalError,
    ParameterError,
    ParseError,
    PercError,
    ResourceError,
    carne_varopoulos,
    channels,
    cheeger_constant,
    components,
    dirichlet_form,
    epsilon_of_n,
    fit_decay,
    full_box_gap,
    good_box,
    heat_kernel,
    iso_constant,
    largest_cluster,
    load,
    origin_cluster,
    sample,
    simulate_walks,
    spans_box,
    spectral_gap,
)

__version__ = "0.1.0"
