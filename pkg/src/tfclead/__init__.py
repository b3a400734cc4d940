"""Lead-time interval prediction for a non-cycle-controlled test-and-finish centre.

Pipeline stages live in their own modules: :mod:`synthgen` (synthetic fleets),
:mod:`ingest` (CSV parsing and record filtering), :mod:`features` (one-hot
encoding), :mod:`labeling` (day-interval classes), :mod:`split` (stratified
partitions), :mod:`gbdt` (the boosting core), :mod:`tune` (grid search),
:mod:`evalcmp` (metrics, rule baseline, drift) and :mod:`cli`.
"""

__version__ = "0.1.0"
