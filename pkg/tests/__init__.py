# Package tests pour SybilEdge
"""
Tests package for the SybilEdge toolkit.

Ce package contient les tests pytest :
- test_graph_model.py, test_rate_estimator.py, test_scorer.py : modèle et inférence
- test_baselines.py, test_synthgraphs.py, test_evaluation.py : comparaisons et expériences
- test_tsv_io.py, test_config.py, test_performance_monitor.py, test_cli.py : surface et outillage
- test_acceptance.py : expériences à l'échelle n=10000 (marqueur `slow`)
"""

__version__ = "1.0.0"
__author__ = "SybilEdge Team"
