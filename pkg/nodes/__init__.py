from .verify_nodes import VerifyNodes

__all__ = ['VerifyNodes']
