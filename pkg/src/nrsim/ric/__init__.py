"""Near-RT RIC emulation: E2-like wire protocol, A1 policies and the scheduling xApp."""
from .a1 import A1Policy, A1PolicyError, load_a1_policy
from .node import E2Node, gnb_apply_control
from .protocol import Ack, Control, E2Message, E2ParseError, Indication, UeKpi, decode_message, encode_message
from .transport import InProcessLink, SocketLink, serve_xapp
from .xapp import Xapp, XappState, xapp_evaluate

__all__ = [
    "A1Policy", "A1PolicyError", "Ack", "Control", "E2Message", "E2Node", "E2ParseError", "Indication",
    "InProcessLink", "SocketLink", "UeKpi", "Xapp", "XappState", "decode_message", "encode_message",
    "gnb_apply_control", "load_a1_policy", "serve_xapp", "xapp_evaluate",
]
