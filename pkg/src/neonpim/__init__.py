"""Replace unsupported nonlinear graph ops with small trained FC nets and cost the
result on a resistive-crossbar model against digital-logic and lookup-table
baselines."""

__version__ = "0.1.0"
