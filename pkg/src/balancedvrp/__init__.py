"""Bi-objective balanced CVRP toolkit: exact and heuristic Pareto fronts under 18 balance objectives."""
