# Package utils pour SybilEdge
"""
SybilEdge toolkit: early detection of fake accounts from friend-request edges.

Modules:
- graph_model : request graph, labels, known/unknown split, label noise
- rate_estimator : confidence-weighted selection and accept rates
- scorer : posterior fake probability of new users (log-odds)
- baselines : RejectRate, SybilRank, SybilSCAR-C / -D
- synthgraphs : synthetic request graphs and simulated responses
- evaluation : bucketed ROC AUC and robustness sweeps
- tsv_io : TSV readers/writers, node name mapping, provenance headers
- config : environment configs and key = value files
- errors : exception hierarchy and CLI exit codes
- performance_monitor : stage timings, counters, process memory
"""

__version__ = "1.0.0"
__author__ = "SybilEdge Team"
