"""Model sources shared across the test suite."""

from gpa import build_state_index, enumerate_transition_classes, parse_model, validate


def processor_resource(m=50, n=20, r1=2.0, q=14.0, r2=14.0, s=2.0, analyses=""):
    return f"""
r1={r1}; q={q};  m={float(m)};            r2={r2}; s={s};  n={float(n)};

Processor0 = (acquire,r1).Processor1;   Resource0 = (acquire,r2).Resource1;
Processor1 = (task,q).Processor0;       Resource1 = (reset,s).Resource0;

      Processors{{Processor0[m]}}<acquire>Resources{{Resource0[n]}}
{analyses}
"""


def client_server(c=100, s=50, r_req=2.0, r_break=0.1, r_think=0.2, r_data=1.0, r_reset=2.0, analyses=""):
    return f"""
c = {float(c)}; s = {float(s)};
r_req = {r_req}; r_break = {r_break}; r_think = {r_think}; r_data = {r_data}; r_reset = {r_reset};

Client = (request, r_req).Client_waiting;
Client_waiting = (data, r_data).Client_think;
Client_think = (think, r_think).Client;

Server = (request, r_req).Server_get + (break, r_break).Server_broken;
Server_get = (data, r_data).Server;
Server_broken = (reset, r_reset).Server;

Clients{{Client[c]}} <request, data> Servers{{Server[s]}}
{analyses}
"""


MODEL_A = dict(r_req=2.0, r_break=0.1, r_think=0.2, r_data=1.0, r_reset=2.0)
MODEL_B = dict(r_req=2.0, r_break=0.3, r_think=0.35, r_data=2.0, r_reset=0.05)


def client_server_a(c=100, s=50, analyses=""):
    return client_server(c, s, analyses=analyses, **MODEL_A)


def client_server_b(c=100, s=50, analyses=""):
    return client_server(c, s, analyses=analyses, **MODEL_B)


# a group whose two derivatives both offer the cooperation action: not split-free
SPLIT_MODEL = """
n = 3.0; m = 2.0; r = 1.0; u = 2.0; q = 4.0;
A = (a, r).B + (b, q).C;
B = (a, u).A;
C = (b, q).A;
P = (a, r).Q;
Q = (b, q).P;
G{A[n] | B[m]} <a> H{P[m]}
"""

# two independent groups, no cooperation anywhere
PURE_CONCURRENT = """
n = 5.0; m = 3.0; r = 1.0; u = 2.0;
A = (go, r).B;
B = (back, u).A;
C = (tick, r).C;
G{A[n]} <> H{C[m]}
"""


def setup(source):
    """Parse + validate + index + classes, the common preamble of most tests."""
    vm = validate(parse_model(source))
    idx = build_state_index(vm)
    classes = enumerate_transition_classes(vm, idx)
    return vm, idx, classes
