LINES = []


def report(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    LINES.append(line)
    print(line)
    return ok


def info(label, detail):
    line = f"INFO  {label}: {detail}"
    LINES.append(line)
    print(line)
