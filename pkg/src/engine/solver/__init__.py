from engine.solver.assembly import Problem, assemble_momentum, assemble_damage, element_energies, stored_energies
from engine.solver.staggered import (
    FieldState, initial_state, solve_damage, solve_momentum, run_load_loop, reaction_force, cmod,
)
