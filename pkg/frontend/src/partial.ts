/** Just enough parsing of the partial model document for an agent to act on. */

export interface PartialSpecies {
  id: string;
  initialValue: number;
  boundaryCondition: boolean;
  constant: boolean;
}

function attribute(tag: string, name: string): string | undefined {
  const match = tag.match(new RegExp(`${name}="([^"]*)"`));
  return match ? match[1] : undefined;
}

/** Extract the species list (ids, initial values, changeability flags). */
export function parsePartialSpecies(sbml: string): PartialSpecies[] {
  const species: PartialSpecies[] = [];
  for (const tag of sbml.match(/<species\b[^>]*\/?>/g) ?? []) {
    const id = attribute(tag, "id");
    if (!id) continue;
    const raw =
      attribute(tag, "initialConcentration") ?? attribute(tag, "initialAmount") ?? "0";
    species.push({
      id,
      initialValue: Number(raw),
      boundaryCondition: attribute(tag, "boundaryCondition") === "true",
      constant: attribute(tag, "constant") === "true",
    });
  }
  return species;
}

/** Species whose initial concentrations the environment will let us change. */
export function changeableSpecies(sbml: string): PartialSpecies[] {
  return parsePartialSpecies(sbml).filter((s) => !s.boundaryCondition && !s.constant);
}
