/* Trimmed from the lattice iterator: only what set_points touches. */
#define DIV_CAP 65
