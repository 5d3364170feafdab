from django import template

register = template.Library()


@register.filter
def sci(value, digits=6):
    """Fixed-width scientific notation; missing values print as '-'"""
    if value is None or value == '':
        return '-'
    try:
        return f'{float(value):.{int(digits)}e}'
    except (TypeError, ValueError):
        return str(value)


@register.filter
def status_mark(status):
    """PASS/FAIL/info column of verdict and check tables"""
    return {'pass': 'PASS', 'fail': 'FAIL', 'reported': 'info', 'skipped': 'skip'}.get(status, status)
