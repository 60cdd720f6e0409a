/** Download basket: an ordered set of statement PIDs kept in sessionStorage. */

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = "reborn.basket";

export class Basket {
  private readonly storage: StorageLike;
  private pids: string[];

  constructor(storage: StorageLike) {
    this.storage = storage;
    this.pids = this.load();
  }

  private load(): string[] {
    const raw = this.storage.getItem(STORAGE_KEY);
    if (raw === null) {
      return [];
    }
    try {
      const parsed: unknown = JSON.parse(raw);
      if (Array.isArray(parsed) && parsed.every((x) => typeof x === "string")) {
        return parsed as string[];
      }
    } catch {
      // corrupted storage entry: start fresh
    }
    return [];
  }

  private persist(): void {
    this.storage.setItem(STORAGE_KEY, JSON.stringify(this.pids));
  }

  list(): string[] {
    return [...this.pids];
  }

  size(): number {
    return this.pids.length;
  }

  has(pid: string): boolean {
    return this.pids.includes(pid);
  }

  /** Add or remove a PID; returns true when the PID is now in the basket. */
  toggle(pid: string): boolean {
    if (this.has(pid)) {
      this.pids = this.pids.filter((p) => p !== pid);
      this.persist();
      return false;
    }
    this.pids = [...this.pids, pid];
    this.persist();
    return true;
  }

  clear(): void {
    this.pids = [];
    this.persist();
  }
}
