"""Experiment matrix, rank statistics and reports."""
from .runner import (
    RECORD_COLUMNS,
    CellCache,
    MetricParams,
    RunRecord,
    cell_seed,
    records_from_json,
    records_to_csv,
    records_to_json,
    run_cell,
    run_matrix,
)
from .stats import (
    RankTable,
    aggregate,
    cd_data,
    family_rank_table,
    friedman,
    knc_slices,
    quality_report,
    rank_table,
    signed_rank_test,
    timing_report,
    wilcoxon_pairs,
)
from .report import build_summary, render_markdown, write_report
