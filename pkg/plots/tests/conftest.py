import pytest

HEADER = ("k,grad_steps,exact_solves,comm_rounds,gap,delta_k,"
          "zeta1,zeta2,zeta3,zeta4,lmi_violation")


def trace_csv(path, rate=0.8, rows=40, grad_per_iter=6):
    """Write a schema-conformant trace with geometric gap decay."""
    lines = [HEADER]
    for k in range(rows):
        gap = rate**k
        lines.append(
            f"{k},{k * grad_per_iter},0,{2 * k},{gap!r},{0.9**k!r},"
            f"0.0,0.0,0.0,{gap!r},0.0"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def two_traces(tmp_path):
    a = trace_csv(tmp_path / "variant_a.csv", rate=0.8, grad_per_iter=6)
    b = trace_csv(tmp_path / "variant_b.csv", rate=0.7, grad_per_iter=2)
    return a, b
