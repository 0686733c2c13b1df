from mmgnn.autodiff.checkpoint import CheckpointError, load_into, read_checkpoint, save_checkpoint
from mmgnn.autodiff.gradcheck import grad_check, gradient_errors
from mmgnn.autodiff.tape import NonFiniteError, Parameter, ShapeError, Tape, Tensor, current_tape

__all__ = [
    "CheckpointError",
    "NonFiniteError",
    "Parameter",
    "ShapeError",
    "Tape",
    "Tensor",
    "current_tape",
    "grad_check",
    "gradient_errors",
    "load_into",
    "read_checkpoint",
    "save_checkpoint",
]
