// Multi-step wizard state: a step can only be entered when every step before
// it is valid, and submission unlocks only when all steps are valid.

export interface StepDef<S> {
  id: string;
  title: string;
  validate: (state: S) => string[]; // empty = valid
}

export class Wizard<S> {
  steps: StepDef<S>[];
  state: S;
  current = 0;

  constructor(steps: StepDef<S>[], initial: S) {
    if (steps.length === 0) throw new Error("wizard needs at least one step");
    this.steps = steps;
    this.state = initial;
  }

  errors(index = this.current): string[] {
    return this.steps[index].validate(this.state);
  }

  stepValid(index: number): boolean {
    return this.steps[index].validate(this.state).length === 0;
  }

  /** Steps 0..k are reachable iff all earlier steps validate. */
  canEnter(index: number): boolean {
    if (index < 0 || index >= this.steps.length) return false;
    for (let i = 0; i < index; i++) {
      if (!this.stepValid(i)) return false;
    }
    return true;
  }

  next(): boolean {
    if (this.current + 1 >= this.steps.length) return false;
    if (!this.stepValid(this.current)) return false;
    this.current += 1;
    return true;
  }

  back(): boolean {
    if (this.current === 0) return false;
    this.current -= 1;
    return true;
  }

  goto(index: number): boolean {
    if (!this.canEnter(index)) return false;
    this.current = index;
    return true;
  }

  canSubmit(): boolean {
    return this.steps.every((_, i) => this.stepValid(i));
  }

  update(patch: Partial<S>): void {
    this.state = { ...this.state, ...patch };
  }
}
