import type { ShimConfig } from "../src/config";

export const CONFIG: ShimConfig = {
  middleOrigin: "http://middle.test:8081",
  firstPartyOrigin: "http://mysite.test:8080",
  inContextParam: "src",
  crossContextParam: "emb",
  firstPartyAllowlist: ["http://static.mysite.test:8080"],
};

export const TRACKER = "http://tracker.test";

export function encapsulated(target: string, param: "src" | "emb" = "src"): string {
  return `${CONFIG.middleOrigin}/?${param}=${encodeURIComponent(target)}`;
}
