"""Climate-modulated logistic growth with a physics-informed network."""

from ._pcmnn import (
    __version__,
    UsageError,
    DataError,
    NumericalError,
    DailyRecord,
    CompositeSeries,
    load_csv,
    window,
    composite,
    years_of,
    read_composite_csv,
    write_composite_csv,
    LogisticParams,
    Climate,
    Trajectory,
    logistic_closed_form,
    integrate_rk4,
    PrefitOptions,
    PrefitResult,
    fit_logistic,
    MetricsReport,
    metrics,
    sup_relative_gap,
    Scenario,
    GroundTruth,
    Dataset,
    generate,
    TrainConfig,
    TrainState,
    AlphaSeries,
    train,
    extract_alpha,
    climate_of,
    verify_backsolve,
    forecast,
    write_checkpoint,
    read_checkpoint,
    cli,
)
