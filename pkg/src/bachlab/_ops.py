"""Opcode and function-id constants shared by the expression tape backends."""

OP_CONST = 0
OP_VAR = 1
OP_PARAM = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_NEG = 7
OP_POW_INT = 8
OP_POW_REAL = 9
OP_CALL = 10

FN_SQRT = 0
FN_EXP = 1
FN_LOG = 2
FN_SIN = 3
FN_COS = 4
FN_SINH = 5
FN_COSH = 6
FN_TANH = 7
FN_ATAN = 8
FN_POW = 9

FN_NAMES = {
    "sqrt": FN_SQRT,
    "exp": FN_EXP,
    "log": FN_LOG,
    "sin": FN_SIN,
    "cos": FN_COS,
    "sinh": FN_SINH,
    "cosh": FN_COSH,
    "tanh": FN_TANH,
    "atan": FN_ATAN,
}
FN_ID_TO_NAME = {v: k for k, v in FN_NAMES.items()} | {FN_POW: "pow"}

ERR_DIV_ZERO = 1
ERR_DOMAIN_BASE = 100  # ERR_DOMAIN_BASE + fid = domain violation in function fid
