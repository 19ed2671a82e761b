"""Market-based resource allocation for tiered service graphs.

The package has two halves that share one capacity formalism:

* a mechanism-theory core — service-dependency DAGs, laminar leaf-block
  families, polymatroid rank functions with governance truncation,
  integrator encapsulation via node-split max-flow, and desk-scale
  auctions (Walrasian verification, VCG, polymatroid clinching) — all
  checkable exhaustively, and
* a deterministic round-based market simulator for device/edge/cloud
  token allocation (tatonnement pricing, online success learning, trust,
  governance pools, hybrid integrator pricing) with a six-experiment
  grid runner, nonparametric statistics, and a CSV reporting contract.
"""

__version__ = "0.1.0"
