"""Feature distillation with cross-attention fusion and learnable spatial/channel masks, on a numpy autodiff core."""

__version__ = "0.1.0"
