from pynorms.scenarios._core import (
    EPISODE_ORDERS,
    BuiltinScenarioProvider,
    GroupMember,
    ScenarioConfig,
    ScenarioProvider,
    Schedule,
    TestPhase,
    get_scenario,
    list_scenarios,
    load_scenario,
    resolve_scenario,
    scenario_from_dict,
)

__all__ = [
    'EPISODE_ORDERS', 'BuiltinScenarioProvider', 'GroupMember', 'ScenarioConfig', 'ScenarioProvider', 'Schedule',
    'TestPhase', 'get_scenario', 'list_scenarios', 'load_scenario', 'resolve_scenario', 'scenario_from_dict',
]
