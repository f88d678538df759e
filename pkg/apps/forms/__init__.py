"""
1-形式模块
加权散度 δ_Ψ、Hodge–de Rham 半群 R_t 与 1-形式恒等式检查
"""
from importlib import import_module

_EXPORTS = {
    'OneFormField': 'apps.forms.fields',
    'exact_form': 'apps.forms.fields',
    'form_from_expression': 'apps.forms.fields',
    'random_smooth_form': 'apps.forms.fields',
    'random_smooth_scalar': 'apps.forms.fields',
    'delta_psi': 'apps.forms.operators',
    'hodge_generator': 'apps.forms.operators',
    'hodge_evolve': 'apps.forms.hodge',
    'evolve_forms_at_times': 'apps.forms.hodge',
    'check_commutation': 'apps.forms.identities',
    'check_refined_blw': 'apps.forms.identities',
    'check_form_identities': 'apps.forms.identities',
    'check_coercive_corollary': 'apps.forms.identities',
    'check_log_gradient_corollary': 'apps.forms.identities',
    'check_coercive_estimate': 'apps.forms.identities',
    'check_integration_by_parts': 'apps.forms.identities',
    'check_hodge_symmetry': 'apps.forms.identities',
}

__all__ = list(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")
