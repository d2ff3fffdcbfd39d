"""Prompt-to-kinetics grain growth workflow.

Turns a constrained natural-language request into a validated simulation
input file, fans out parameter sweeps with full per-run provenance,
diagnoses and retries failed runs, and fits coarsening and Arrhenius
kinetics from the results.  An embedded 2D Allen-Cahn solver stands in
for the external finite-element binary so the whole loop runs at desk
scale.
"""

__version__ = "0.1.0"
