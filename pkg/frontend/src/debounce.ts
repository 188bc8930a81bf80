/** Trailing-edge debouncer: rapid triggers collapse into one call after
 * the window elapses. */

export interface Debouncer {
  trigger: () => void;
  cancel: () => void;
}

export function createDebouncer(ms: number, fn: () => void): Debouncer {
  let timer: ReturnType<typeof setTimeout> | null = null;

  const trigger = (): void => {
    if (timer) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      fn();
    }, ms);
  };

  const cancel = (): void => {
    if (timer) {
      clearTimeout(timer);
      timer = null;
    }
  };

  return { trigger, cancel };
}
