import type { ShimConfig } from "./config";
import {
  installDocumentWrite,
  installElementInterceptors,
  installNetworkInterceptors,
} from "./interceptors";
import { installMessageBlocking } from "./messaging";
import { createUrlHandler, type UrlHandler } from "./urls";

export type { ShimConfig } from "./config";
export type { ContextKind, UrlHandler } from "./urls";
export { createUrlHandler } from "./urls";
export { rewriteMarkup } from "./interceptors";

export interface ShimApi {
  handleURL: UrlHandler["handleURL"];
  config: ShimConfig;
}

type AnyWindow = Window & typeof globalThis & Record<string, any>;

/**
 * Install every interceptor on the given window and expose the single
 * namespaced global.  Must run before any other script in the page; the
 * rewrite server guarantees that by injecting the shim as the first child
 * of head.  The CSP remains the enforcement floor; the shim is the
 * compatibility layer that keeps dynamic content loading.
 */
export function installShim(win: AnyWindow, config: ShimConfig): ShimApi {
  const handler = createUrlHandler(config, () => win.document.baseURI);
  installElementInterceptors(win, handler);
  installDocumentWrite(win, handler);
  installNetworkInterceptors(win, handler);
  installMessageBlocking(win, handler);

  const api: ShimApi = { handleURL: handler.handleURL, config };
  Object.defineProperty(win, "__trackgateShim", {
    value: api,
    configurable: true,
    writable: false,
  });
  return api;
}
