__version__ = "0.1.0"

from pinsim.walks import \
    StepLaw, \
    KernelTable, \
    build_kernel_table, \
    load_or_build_kernel_table, \
    validate_step_law

from pinsim.continuum_kernels import \
    TestFn, \
    heat_kernel, \
    make_test_function, \
    pairings, \
    sE

from pinsim.disorder import \
    parse_disorder_law, \
    solve_critical_beta, \
    zeta_field, \
    zeta_fields

from pinsim.partition import \
    pin_partition, \
    chaos_eval, \
    polymer_kernels, \
    polymer_measure_integral, \
    exact_second_moment, \
    v1_theta

from pinsim.dickman import \
    DickmanDensity, \
    dickman_density, \
    GThetaTable, \
    g_theta, \
    build_ubar

from pinsim.coarse_grain import \
    MesoGrid, \
    theta, \
    z_no_triple, \
    l_cg, \
    z_cg

from pinsim.she_continuum import \
    Mollifier, \
    continuum_window, \
    she_second_moment_semianalytic, \
    she_mc

from pinsim.ensemble import \
    MCEstimate, \
    run_ensemble
