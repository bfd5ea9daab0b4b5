"""A resolution prover whose given-clause selection can be guided by
boosted trees trained on its own proofs."""

__version__ = "0.1.0"
