import "./styles.css";
import { ApiClient } from "./api";
import { initConsole } from "./main";

const root = document.getElementById("app");
if (root) {
  void initConsole(root, new ApiClient(""));
}
